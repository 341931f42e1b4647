"""Build-time instrumentation (G) and runtime derivation (F)."""
