"""Earth mover's distance kernels: exact transport on weighted multisets,
definiteness-preserving transformations, Gram diagnostics and corrections,
and precomputed-kernel SVMs."""

from .multiset import WeightedPointSet, intersect, normalize, sum_sets, total_mass, unite
from .ground import (
    GroundDistance,
    SinkSpec,
    circle_geodesic,
    discrete,
    distance_from_kernel,
    euclidean,
    kernel_from_distance,
    precomputed,
    squared_euclidean,
)
from .transport import (
    TransportPlan,
    emd,
    emd_1d,
    emd_circle,
    emd_circle_mean_approx,
    emd_rubner,
    emdhat_alpha,
    emdhat_p,
    emdnot,
    emi,
    emi_from_kernel,
    emi_prime,
)
from .transform import (
    biotope_transform,
    biotope_transform_matrix,
    pd_ization_order,
    transform_pd,
    transform_pd_matrix,
    transform_pd_nested,
    transform_pd_nested_matrix,
)
from .gram import (
    DefinitenessReport,
    GramMatrix,
    RbfParams,
    assemble_gram,
    diagnose,
    flow_gram_pdize,
    idk,
    ksvm_correct,
    rbf_from_distance,
    shift_correct,
)
from .svm import KernelSVC, SvmModel, predict, train_binary, train_one_vs_all
from .datasets import Dataset, load_dataset, save_dataset
from .harness import (
    ExperimentSpec,
    TransportKernelTransformer,
    generate_synthetic,
    run_experiment,
)

__version__ = "0.1.0"
