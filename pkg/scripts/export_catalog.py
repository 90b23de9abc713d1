"""Regenerate src/rbmat/data/catalog.json from the in-code catalog."""
import json
from pathlib import Path

from rbmat.catalog import catalog_manifest

OUT = Path(__file__).resolve().parents[1] / "src" / "rbmat" / "data" / "catalog.json"

if __name__ == "__main__":
    OUT.write_text(json.dumps(catalog_manifest(), indent=2) + "\n")
    print(f"wrote {OUT}")
