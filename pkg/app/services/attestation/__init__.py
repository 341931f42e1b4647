from .local import create_platform, ereport, platform_from_seed, report_key, verify_report

__all__ = ["create_platform", "ereport", "platform_from_seed", "report_key", "verify_report"]
