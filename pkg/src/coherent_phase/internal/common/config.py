import os
from coherent_phase.config import VerificationConfig as VerificationConfig


class EnvVerificationConfig(VerificationConfig):
    """Retrieve the verification configuration from environment variables."""

    def __init__(self, prefix: str = ""):
        """Create the verification configuration and retrieve values from env vars.

        :param prefix: Prefix to the name environment variables.
        """
        env_prefix = f"{prefix}COHERENT_PHASE_"
        super().__init__(
            quad_order=int(
                os.environ.get(f"{env_prefix}QUAD_ORDER", VerificationConfig.quad_order)
            ),
            tol=float(os.environ.get(f"{env_prefix}TOL", VerificationConfig.tol)),
            trials=int(os.environ.get(f"{env_prefix}TRIALS", VerificationConfig.trials)),
            seed=int(os.environ.get(f"{env_prefix}SEED", VerificationConfig.seed)),
            fd_step=float(os.environ.get(f"{env_prefix}FD_STEP", VerificationConfig.fd_step)),
            radius_cap=float(
                os.environ.get(f"{env_prefix}RADIUS_CAP", VerificationConfig.radius_cap)
            ),
            collinear_tol=float(
                os.environ.get(f"{env_prefix}COLLINEAR_TOL", VerificationConfig.collinear_tol)
            ),
            workers=int(os.environ.get(f"{env_prefix}WORKERS", VerificationConfig.workers)),
            max_resample=int(
                os.environ.get(f"{env_prefix}MAX_RESAMPLE", VerificationConfig.max_resample)
            ),
        )
