"""Remaining-useful-life prediction with coarse/fine supervised contrastive training."""

__version__ = "0.1.0"
