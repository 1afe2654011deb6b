"""Identify scientists on a microblogging platform from list metadata and
analyse their demographics, link sharing and networks."""

from .lexicon import OesGroup, TitleEntry, TitleLexicon, compile_lexicon, load_lexicon, match_titles
from .sampler import SampleResult, select_seeds, snowball
from .source import FixtureSource, RateBudget, RateLimiter, VirtualClock

__all__ = [
    "FixtureSource", "OesGroup", "RateBudget", "RateLimiter", "SampleResult", "TitleEntry",
    "TitleLexicon", "VirtualClock", "compile_lexicon", "load_lexicon", "match_titles",
    "select_seeds", "snowball",
]

__version__ = "0.1.0"
