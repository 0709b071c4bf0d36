"""
Question-answering metrics without a reference
==============================================

Cloze questions are built by masking named entities in the article. A
summary that preserves the facts lets the QA model recover the masked
entities.
"""

from qasumm.backends import LexicalQAOracle, RuleBasedNER
from qasumm.qa import generate_triplets, qa_metrics

ner = RuleBasedNER()
qa = LexicalQAOracle(ner)

article = (
    "Maria Lopez won the marathon in Boston on Monday. "
    "She trained for two years in Denver. "
    "Her coach Peter Hall praised her pacing."
)

for t in generate_triplets(article, "<summary>", ner):
    print(f"{t.question!r:60} -> {t.answer}")

faithful = "Maria Lopez won the marathon in Boston. Her coach Peter Hall praised her."
vague = "A runner won a race after training."

# unsupervised variant: questions come from the article, so no reference is needed
for name, summary in [("faithful", faithful), ("vague", vague)]:
    res = qa_metrics(article, summary, ner, qa)
    print(f"{name:9} QA_fscore={res.fscore:.3f} QA_conf={res.confidence:.3f} ({res.n_questions} questions)")
