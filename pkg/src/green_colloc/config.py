import os  # noqa: C101
import sys

_save_config_ignore = {
    # workaround: "Can't pickle <function ...>"
}


class quadrature:
    # Gauss-Legendre points per smooth segment
    order = int(os.getenv("GREEN_COLLOC_QUAD_ORDER", "20"))

    # target points handled per vectorized kernel block
    chunk_size = int(os.getenv("GREEN_COLLOC_QUAD_CHUNK_SIZE", "512"))


class sampling:
    points_per_interval = int(os.getenv("GREEN_COLLOC_SAMPLING_POINTS_PER_INTERVAL", "50"))

    check_points = int(os.getenv("GREEN_COLLOC_SAMPLING_CHECK_POINTS", "101"))


class kernel:
    fd_step = float(os.getenv("GREEN_COLLOC_KERNEL_FD_STEP", "1e-5"))

    diagonal_tolerance = float(os.getenv("GREEN_COLLOC_KERNEL_DIAGONAL_TOLERANCE", "1e-12"))


class solver:
    cond_threshold = float(os.getenv("GREEN_COLLOC_COND_THRESHOLD", "1e12"))
    cond_iterations = int(os.getenv("GREEN_COLLOC_COND_ITERATIONS", "5"))

    residual_tolerance = float(os.getenv("GREEN_COLLOC_RESIDUAL_TOLERANCE", "1e-10"))

    check_reconstruction = os.getenv("GREEN_COLLOC_CHECK_RECONSTRUCTION", "1") == "1"
    reconstruction_tolerance = float(os.getenv("GREEN_COLLOC_RECONSTRUCTION_TOLERANCE", "1e-8"))


class probes:
    points_per_interval = int(os.getenv("GREEN_COLLOC_PROBES_POINTS_PER_INTERVAL", "25"))

    # relative to h
    node_exclusion = float(os.getenv("GREEN_COLLOC_PROBES_NODE_EXCLUSION", "1e-6"))
    confluent_shift = float(os.getenv("GREEN_COLLOC_PROBES_CONFLUENT_SHIFT", "1e-5"))

    floor = float(os.getenv("GREEN_COLLOC_PROBES_FLOOR", "1e-13"))


class study:
    slope_tolerance = float(os.getenv("GREEN_COLLOC_SLOPE_TOLERANCE", "0.3"))
    error_floor = float(os.getenv("GREEN_COLLOC_ERROR_FLOOR", "1e-14"))

    num_workers = int(os.getenv("GREEN_COLLOC_NUM_WORKERS", "1"))


try:
    from torch.utils._config_module import install_config_module
except ImportError:
    # torch<2.2.0
    from torch._dynamo.config_utils import install_config_module

# adds patch, save_config, etc
install_config_module(sys.modules[__name__])
