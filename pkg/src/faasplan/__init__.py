"""SLO-driven replica planning for FaaS platforms.

A discrete-event platform simulator generates labeled measurements; a
from-scratch neural classifier predicts the replica count a container/rate
combination needs; call-graph similarity lets brand-new applications borrow
the model of the closest known one; and the planner picks the cheapest
simulator-verified configuration that meets each function's deadline.
"""

from .callgraph import (
    CallGraph,
    DissimilarityResult,
    ModelRegistry,
    RegistryEntry,
    SimilarCandidate,
    StarStructure,
    dissimilarity_score,
    exact_ged,
    find_similar,
    ged_bounds,
    star_decomposition,
    star_edit_distance,
)
from .estimator import ReplicaPredictor
from .model import (
    ConfigSpace,
    Configuration,
    ContainerConfig,
    ExecutionProfile,
    FunctionSpec,
    PriceTable,
    WctBreakdown,
    cost_savings,
    mean_execution_time,
    meets_slo,
    plan_cost,
    workload_completion_time,
)
from .nn import (
    Network,
    ReplicaModel,
    TrainingConfig,
    TrainingReport,
    backward,
    evaluate,
    forward,
    init_network,
    loss,
    model_from_dict,
    model_to_dict,
    predict_replicas,
    train,
)
from .planner import (
    CandidateEvaluation,
    Provenance,
    ProvisioningPlan,
    ProvisionRequest,
    naive_max_plan,
    profile_sweep,
    provision,
    select_configuration,
)
from .registry import IntegrityError, NotFoundError, RegistryStore
from .simulator import (
    LabeledDataset,
    PlatformParams,
    SimResult,
    WorkloadTrace,
    build_dataset,
    generate_trace,
    init_duration,
    measure_throughput,
    read_dataset_csv,
    simulate,
    write_dataset_csv,
)

__version__ = "0.1.0"
