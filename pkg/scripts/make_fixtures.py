"""Write the hand-built fixtures under fixtures/ as JSON files.

    python3 scripts/make_fixtures.py [outdir]
"""
import json
import sys
from pathlib import Path

from drlcheck import fixtures as F
from drlcheck.network import save_network
from drlcheck.query import constraint_to_dict, query_to_dict
from drlcheck.transition import spec_to_dict


def dump(path: Path, doc):
    path.write_text(json.dumps(doc, indent=1) + "\n")


def write_system(out: Path, name: str, spec, prop, assume=()):
    save_network(spec.net, out / f"{name}.net.json")
    dump(out / f"{name}.spec.json", spec_to_dict(spec, f"{name}.net.json"))
    dump(out / f"{name}.prop.json", {
        "kind": prop.kind,
        "predicate": [constraint_to_dict(c) for c in prop.predicate.constraints],
        "assume": [constraint_to_dict(c) for c in assume],
    })


def write_unrolled_query(out: Path, name: str, spec, q):
    save_network(spec.net, out / f"{name}.net.json")
    dump(out / f"{name}.spec.json", spec_to_dict(spec, f"{name}.net.json"))
    dump(out / f"{name}.query.json", {
        "spec": f"{name}.spec.json",
        "unroll": {"k": q.copies, "start": "anywhere"},
        "constraints": [constraint_to_dict(c) for c in q.constraints],
    })


def main(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    save_network(F.toy_network(), out / "toy.net.json")
    for name, q in (("toy", F.toy_query()), ("toy-unsat", F.toy_query(1.0, 2.0))):
        doc = {"network": "toy.net.json", **query_to_dict(q)}
        if name == "toy-unsat":
            doc["boxes"] = {"0:in:0": [1.0, 2.0], "0:in:1": [3.0, 4.0]}
        dump(out / f"{name}.query.json", doc)

    write_system(out, "depth3", *F.depth3())
    write_system(out, "pointwise", *F.pointwise_safe())
    spec, prop = F.pointwise_live()
    dump(out / "pointwise-live.prop.json", {
        "kind": prop.kind, "predicate": [constraint_to_dict(c) for c in prop.predicate.constraints]})
    spec, prop, assume = F.aurora_mini()
    write_system(out, "aurora-mini", spec, prop, assume)
    write_system(out, "stall", *F.stall())
    write_system(out, "two-step-memory", *F.two_step_memory())
    write_unrolled_query(out, "zero-weight", *F.zero_weight_history())
    write_unrolled_query(out, "spurious", *F.spurious_history())

    save_network(F.identity_passthrough(), out / "identity.net.json")
    dump(out / "identity-output.inv.json",
         {"network": "identity.net.json", "template": "output", "boxes": [[-0.1, 0.1]], "eta": 0.01})
    save_network(F.two_minus_x(), out / "two-minus-x.net.json")
    dump(out / "two-minus-x-input.inv.json",
         {"network": "two-minus-x.net.json", "template": "input", "boxes": [[1.0, 8.0]],
          "searched_positions": [0], "pkt": 8, "precision": 1})
    dump(out / "aurora-mini-output.inv.json", {
        "spec": "aurora-mini.spec.json", "template": "output", "epsilon": 0.1, "eta": 0.01,
        "fields": {"latency_gradient": "symmetric", "latency_ratio": "unit_slack", "sending_ratio": 1.0},
    })
    dump(out / "aurora-mini-input.inv.json", {
        "spec": "aurora-mini.spec.json", "template": "input", "epsilon": 0.1, "pkt": 8,
        "fields": {"latency_gradient": "symmetric", "latency_ratio": "unit_slack", "sending_ratio": "searched"},
        "searched": "sending_ratio",
    })


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures")
