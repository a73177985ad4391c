"""Scratch tuning harness (not part of the package)."""
import sys
import time

import numpy as np

from rankdistill.harness import (
    config_from_dict,
    distill_student,
    snapshot_teacher,
    train_teacher,
)
from rankdistill.synthdata import generate

SCHEMES = {
    "cls-only": {"scheme": "cls-only"},
    "radi-p": {"scheme": "radi-p"},
    "radi-l": {"scheme": "radi-l"},
    "vanilla-kd": {"scheme": "vanilla-kd"},
    "pseudo-3": {"scheme": "pseudo-labeling"},
    "smooth-0.0": {"scheme": "label-smoothing", "baseline": {"sigma": 0.0}},
    "smooth-0.5": {"scheme": "label-smoothing", "baseline": {"sigma": 0.5}},
}


def run(base_extra, seeds=(0, 1, 2), schemes=SCHEMES, tag=""):
    t0 = time.perf_counter()
    results = {s: [] for s in schemes}
    teachers = []
    for seed in seeds:
        base = {
            "seed": seed,
            "task": {"seed": seed, "feature_noise": 1.5, "label_noise": 0.3},
            "teacher": {"lr": 0.1},
            "student": {"lr": 0.1},
        }
        for key, val in base_extra.items():
            if isinstance(val, dict):
                base.setdefault(key, {}).update(val)
            else:
                base[key] = val
        cfg0 = config_from_dict({**base, "scheme": "cls-only"})
        data = generate(cfg0.task)
        teacher, trec = train_teacher(cfg0, data)
        teachers.append(trec.test_result.acc_at_1)
        for name, extra in schemes.items():
            doc = dict(base)
            for key, val in extra.items():
                if isinstance(val, dict):
                    doc[key] = {**doc.get(key, {}), **val}
                else:
                    doc[key] = val
            cfg = config_from_dict(doc)
            snap = snapshot_teacher(teacher, data[0], cfg)
            student, rec = distill_student(snap, cfg, data)
            r = rec.test_result
            results[name].append((r.acc_at_1, r.hit_at_k, r.ndcg_at_k))
    print(f"== {tag} teacher_acc1={np.mean(teachers):.3f} [{time.perf_counter()-t0:.0f}s]")
    base_m = np.mean(results.get("cls-only", [[0, 0, 0]]), axis=0)
    for name, vals in results.items():
        m = np.mean(vals, axis=0)
        print(
            f"  {name:11s} acc1={m[0]:.3f} hit5={m[1]:.3f} ndcg5={m[2]:.3f}"
            f"   d_hit={100 * (m[1] - base_m[1]):+.1f} d_ndcg={100 * (m[2] - base_m[2]):+.1f}"
        )
    sys.stdout.flush()
    return results


if __name__ == "__main__":
    run({}, tag="defaults 30/30 lr0.1 noise0.3")
