"""Cross-cutting concerns: config, logging, exceptions, seeded streams, parallelism, traces."""
