"""Forensic handwriting measurement and comparison toolkit."""

from .errors import ScriptoriaError
from .imaging import BinaryImage, DocumentRecord, GrayImage, binarize, load_gray, otsu_threshold
from .layout import (
    ColumnHistogram,
    LayoutMeasures,
    LineBand,
    RowHistogram,
    WordBox,
    analyze_layout,
    column_histogram,
    default_so,
    denoise,
    detect_line_bands,
    detect_middle_bands,
    detect_words,
    extend_zones,
    layout_measures,
    row_histogram,
)
from .matcher import (
    CharMatch,
    MatcherConfig,
    TemplateQuery,
    distance,
    embed,
    occurrence_measures,
    run_search,
    search_template,
)
from .network import EmbeddingNetwork, load_network, random_network, save_network
from .features import (
    ComparisonResult,
    FeatureVector,
    MeasureSet,
    build_feature_vector,
    calibrate_threshold,
    compare,
    normalize_mode,
    summarize,
)
from .synthetic import (
    GroundTruth,
    WriterProfile,
    generate_bar_document,
    generate_document,
    profile_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
