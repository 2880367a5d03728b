"""Fine-tuning bridge: trains small local models on exported corpora.

Reads only the pipeline's documented file formats (CoNLL for NER, TSV
for RE, key:value job specs) and writes prediction JSONL plus optional
sentence-embedding files back in the same contract. The pipeline never
imports this package; the boundary is files.
"""

__version__ = "0.1.0"
