"""Generative lexicalised statistical parsing (head-Markov, subcat frames, gaps)."""
__version__ = "0.1.0"
