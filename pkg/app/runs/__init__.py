from app.runs.store import RunPaths, RunStore, read_manifest, write_manifest

__all__ = ["RunPaths", "RunStore", "read_manifest", "write_manifest"]
