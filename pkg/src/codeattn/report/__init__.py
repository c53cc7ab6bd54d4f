from .pipeline import RunConfig, TooManyParseFailures, analyse_corpus, analyse_snippet
from .runs import IndexOutOfRange, Resources, RunManifest, load_resources, run_agreement, run_maps, run_trends

__all__ = [
    "RunConfig",
    "TooManyParseFailures",
    "analyse_corpus",
    "analyse_snippet",
    "IndexOutOfRange",
    "Resources",
    "RunManifest",
    "load_resources",
    "run_agreement",
    "run_maps",
    "run_trends",
]
