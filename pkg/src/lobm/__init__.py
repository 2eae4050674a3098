"""Classical training engine for photon-native generative models.

A linear-optical Born machine is trained against fixed-Hamming-weight
bitstring data by minimizing a Monte-Carlo estimate of the squared maximum
mean discrepancy, built from Glynn permanent estimators of a conjugated
diagonal observable.  Exact desk-scale oracles (permanents, brute-force
boson sampling, exhaustive mask sums) back every estimator.
"""

from . import _backend  # noqa: F401  (switches JAX to 64-bit before first use)
from .baselines import (
    RbmModel,
    rbm_sample,
    rbm_train,
    test_to_test_mmd,
    uniform_fixed_hw_sample,
)
from .bosonsim import (
    OutputDistribution,
    draw_samples,
    generate_boson_dataset,
    haar_unitary,
    output_distribution,
)
from .circuits import (
    CircuitSpec,
    MESH_KINDS,
    compose_mesh,
    compose_unitary,
    deserialize_spec,
    initialize_parameters,
    make_input_state,
    mzi_block,
    parameter_count,
    qr_haar_statistics_probe,
    serialize_spec,
)
from .core import (
    build_submatrix,
    enumerate_fock_space,
    fock_space_size,
    glynn_exhaustive_mean,
    glynn_sample,
    gurvits_permanent_mc,
    permanent_exact,
    permanent_naive,
    permanent_ryser,
)
from .dataio import (
    Dataset,
    ingest_expression_table,
    ingest_rankings,
    read_dataset,
    shuffle_split,
    write_dataset,
)
from .gradients import finite_difference_check, mmd_gradient
from .mmd import (
    KernelConfig,
    MMDConfig,
    estimate_mmd,
    expectation_wk_exact,
    gaussian_kernel,
    mmd_exact,
    mmd_hat_figure1,
    mmd_lo_exact,
    mmd_unbiased_samples,
    mod2_kernel,
    p_sigma,
    sample_mask,
)
from .rng import substream
from .training import TrainConfig, adam_step, evaluate_model, train

__version__ = "0.1.0"
