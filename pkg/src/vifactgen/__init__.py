"""Toolkit for LLM-generated Vietnamese fact-checking datasets.

Pipeline-shaped: ingest a topical corpus, sample multi-sentence evidence,
render label-conditioned prompts, generate claims through provider clients,
filter abnormal generations, compute linguistic statistics, split/compose
datasets, evaluate verdict classifiers, and run the human-annotation
protocol (HTTP service + agreement metrics).
"""

__version__ = "0.1.0"
