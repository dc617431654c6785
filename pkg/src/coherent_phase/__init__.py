from coherent_phase.internal.common.app_logging import LogLevel, setup_logging

setup_logging(LogLevel.from_env(), "coherent_phase")
