"""HTTP service, ingest pipeline, and command line client."""
