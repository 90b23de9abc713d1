"""Print fingerprints of the M_3 representatives and list colliding groups."""
import argparse
import json
from collections import defaultdict

from rbmat.catalog import param_label, samples, select


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("selector", nargs="?", default="Q*")
    ap.add_argument("--json", action="store_true", help="dump full fingerprints as JSON")
    args = ap.parse_args()

    from rbmat.structure import fingerprint
    rows = {}
    for i, p, L in samples(select(args.selector)):
        rows[f"{i}[{param_label(p)}]" if p else i] = fingerprint(L)
    if args.json:
        print(json.dumps({k: v.to_json() for k, v in rows.items()}, indent=2))
        return
    groups = defaultdict(list)
    for label, fp in rows.items():
        groups[fp].append(label)
        print(f"{label:28s} im={fp.dim_im} ker={fp.dim_ker} im^ker={fp.dim_im_cap_ker} "
              f"rad={fp.radical_dim} idem={fp.idempotent_ranks} nil={fp.nil_index} "
              f"kerNondeg={fp.ker_contains_nondegenerate}")
    print("\ncollisions:")
    for labels in groups.values():
        if len(labels) > 1:
            print("  " + ", ".join(labels))


if __name__ == "__main__":
    main()
