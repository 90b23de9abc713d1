"""Tabulate computed nilpotency indices of Q1..Q24 against the asserted classes."""
from rbmat.catalog import nilindex_partition

if __name__ == "__main__":
    report = nilindex_partition()
    for r in report["rows"]:
        label = f"{r['id']}[{r['params']}]" if r["params"] else r["id"]
        flag = "" if r["ok"] else "   <-- mismatch"
        print(f"{label:28s} index={r['index']}  asserted={r['stated']}{flag}")
    print(f"\n{len(report['mismatches'])} mismatches, "
          f"{len(report['index_four'])} entries of index 4")
