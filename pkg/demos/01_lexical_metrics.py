"""
Lexical metrics on a single summary
===================================

ROUGE-N, ROUGE-L, Novelty and the Text-Rank summary score for one article.
"""

from qasumm.lexical import novelty, rouge_l, rouge_n, textrank, textrank_summary_score
from qasumm.text import tokenize

article = (
    "The city council approved a new budget on Tuesday. "
    "The budget raises spending on public transport. "
    "Council members argued about bus fares for hours. "
    "Local shops reported a quiet week."
)
reference = "The council approved a budget that raises transport spending."
candidate = "Council approved a new budget with more transport spending."

# ROUGE compares lowercased tokens and keeps the best match over references
for n in (1, 2):
    print(f"ROUGE-{n}", rouge_n(candidate, [reference], n))
print("ROUGE-L", rouge_l(candidate, [reference]))

# Novelty rewards n-grams the reference never used
print("novelty", round(novelty(candidate, reference), 4))

# Text-Rank ranks article sentences; the summary inherits the importance of
# the sentences it matches best
scores = textrank(tokenize(article))
for i, s in enumerate(scores.importance):
    print(f"sentence {i}: importance {s:.3f}")
print("text-rank summary score", round(textrank_summary_score(article, candidate), 4))
