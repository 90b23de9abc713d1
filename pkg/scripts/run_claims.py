"""Run every conjugation claim between catalog operators and the block projections."""
from rbmat.catalog import block_projections, mapping_claims

if __name__ == "__main__":
    for c in mapping_claims():
        status = "ok" if c["verdict"] else f"FAILS at {c['first_difference']}"
        print(f"{c['claim']:40s} over {c['domain']:3s} via {' -> '.join(c['chain'])}: {status}")
    for b in block_projections():
        print(f"projection {b['source']} -> {b['target']}: {'ok' if b['ok'] else b['differences']}")
