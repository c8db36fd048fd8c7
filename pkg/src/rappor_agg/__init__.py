"""Privacy-preserving report aggregation.

Clients encode string values with RAPPOR (bloom filter, permanent and
instantaneous randomized response). The aggregator reduces each report to a
single TF-IDF-style weighted sum and stores only quantized sums with
per-label counts; analysis matches unlabeled test batches against the store
to recover the majority true value.
"""

from .analysis import (
    AnalysisReport,
    ExperimentRow,
    analyze_batch,
    match_report,
    read_results_csv,
    run_experiment,
    write_results_csv,
)
from .client import (
    ClientReport,
    EncodingParams,
    assign_cohort,
    bloom_encode,
    encode_report,
    instantaneous_rr,
    permanent_rr,
)
from .constants import (
    REFERENCE_WEIGHTS_K32,
    ConstantTable,
    ProportionEstimate,
    RRSurvey,
    SamplingCheck,
    build_constant_table,
    estimate_true_proportion,
    idf,
    tf,
    verify_constant_rule,
)
from .fleet import (
    CorpusParseError,
    FleetConfig,
    exponential_distribution,
    from_bitstring,
    generate_corpus,
    read_csv,
    strip_labels,
    to_bitstring,
    write_csv,
)
from .store import CentralStore, StoreEntry, StoreParseError
from .weighting import WeightedSum, quantize_key, report_keys, weighted_sum, weighted_sum_of_report

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "CentralStore",
    "ClientReport",
    "ConstantTable",
    "CorpusParseError",
    "EncodingParams",
    "ExperimentRow",
    "FleetConfig",
    "ProportionEstimate",
    "REFERENCE_WEIGHTS_K32",
    "RRSurvey",
    "SamplingCheck",
    "StoreEntry",
    "StoreParseError",
    "WeightedSum",
    "analyze_batch",
    "assign_cohort",
    "bloom_encode",
    "build_constant_table",
    "encode_report",
    "estimate_true_proportion",
    "exponential_distribution",
    "from_bitstring",
    "generate_corpus",
    "idf",
    "instantaneous_rr",
    "match_report",
    "permanent_rr",
    "quantize_key",
    "read_csv",
    "read_results_csv",
    "run_experiment",
    "strip_labels",
    "tf",
    "to_bitstring",
    "verify_constant_rule",
    "weighted_sum",
    "weighted_sum_of_report",
    "write_csv",
    "write_results_csv",
]
