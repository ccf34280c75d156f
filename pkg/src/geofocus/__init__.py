"""geofocus: country-level geographical focus of news documents from
toponym annotation layers, plus the statistics to compare those layers."""

from .corpus import (
    AnnotationLayer,
    Corpus,
    CorpusLoadError,
    Document,
    KeywordConfig,
    ToponymSpan,
    UnknownLayerError,
    load_corpus,
    load_keywords,
    sentence_index,
    toponym_types,
)
from .gazetteer import (
    FixtureGazetteer,
    GazetteerCache,
    GazetteerMatch,
    GeonamesClient,
    IncompleteCacheError,
    NominatimClient,
    ThrottleError,
    TransportError,
    filter_matches,
    query_remote,
)
from .geometry import GeoPoint
from .prediction import (
    CountryPrediction,
    HullPolygon,
    build_hull,
    predict_centroid,
    predict_keyword,
    predict_majority,
    remove_outliers,
)
from .resolution import ResolvedToponym, distance_to_polygon, resolve_document

__version__ = "0.1.0"

__all__ = [
    "AnnotationLayer", "Corpus", "CorpusLoadError", "Document", "KeywordConfig",
    "ToponymSpan", "UnknownLayerError", "load_corpus", "load_keywords",
    "sentence_index", "toponym_types",
    "FixtureGazetteer", "GazetteerCache", "GazetteerMatch", "GeonamesClient",
    "IncompleteCacheError", "NominatimClient", "ThrottleError", "TransportError",
    "filter_matches", "query_remote",
    "GeoPoint",
    "CountryPrediction", "HullPolygon", "build_hull", "predict_centroid",
    "predict_keyword", "predict_majority", "remove_outliers",
    "ResolvedToponym", "distance_to_polygon", "resolve_document",
    "__version__",
]
