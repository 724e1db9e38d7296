import os

# let sweeps and ensembles fan out across both cores unless the caller
# already pinned a worker count
os.environ.setdefault("GENNEG_WORKERS", str(min(2, os.cpu_count() or 1)))
