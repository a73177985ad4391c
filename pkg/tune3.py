"""Scratch: 5-seed rehearsal of the two trend-level acceptance experiments."""
import time

import numpy as np

from rankdistill.harness import (
    config_from_dict,
    distill_student,
    snapshot_teacher,
    train_teacher,
)
from rankdistill.synthdata import generate

LR = 0.3
SEEDS = (0, 1, 2, 3, 4)


def base_doc(seed, teacher_epochs=30):
    return {
        "seed": seed,
        "task": {"seed": seed, "feature_noise": 1.5, "label_noise": 0.3},
        "teacher": {"lr": LR, "epochs": teacher_epochs},
        "student": {"lr": LR},
    }


def crit6():
    t0 = time.perf_counter()
    schemes = {
        "cls-only": {"scheme": "cls-only"},
        "radi-p": {"scheme": "radi-p"},
        "radi-l": {"scheme": "radi-l"},
        "vanilla-kd": {"scheme": "vanilla-kd"},
        "smooth-0.0": {"scheme": "label-smoothing", "baseline": {"sigma": 0.0}},
        "smooth-0.5": {"scheme": "label-smoothing", "baseline": {"sigma": 0.5}},
    }
    acc = {s: [] for s in schemes}
    teacher_acc = []
    for seed in SEEDS:
        base = base_doc(seed)
        cfg0 = config_from_dict({**base, "scheme": "cls-only"})
        data = generate(cfg0.task)
        teacher, trec = train_teacher(cfg0, data)
        teacher_acc.append(trec.test_result.acc_at_1)
        for name, extra in schemes.items():
            doc = {**base, **{k: v for k, v in extra.items() if k != "baseline"}}
            if "baseline" in extra:
                doc["baseline"] = extra["baseline"]
            cfg = config_from_dict(doc)
            snap = snapshot_teacher(teacher, data[0], cfg)
            _, rec = distill_student(snap, cfg, data)
            r = rec.test_result
            acc[name].append((r.acc_at_1, r.hit_at_k, r.ndcg_at_k))
    print(f"crit6 rehearsal [{time.perf_counter() - t0:.0f}s] teacher={np.mean(teacher_acc):.3f}")
    means = {s: np.mean(v, axis=0) for s, v in acc.items()}
    for s, m in means.items():
        print(f"  {s:11s} acc1={m[0]:.4f} hit5={m[1]:.4f} ndcg5={m[2]:.4f}")
    cls = means["cls-only"]
    print("6a teacher>=0.18:", np.mean(teacher_acc) >= 0.18)
    for s in ("radi-p", "radi-l"):
        print(
            f"6b {s}: d_hit={means[s][1]-cls[1]:+.4f} (>=0.01) d_ndcg={means[s][2]-cls[2]:+.4f} (>=0.01)"
        )
    kd = means["vanilla-kd"][2]
    print(
        f"6c: radi-p ndcg {means['radi-p'][2]:.4f} >= {kd - 0.005:.4f}:",
        means["radi-p"][2] >= kd - 0.005,
        "| radi-l:",
        means["radi-l"][2] >= kd - 0.005,
        "| one strictly >:",
        max(means["radi-p"][2], means["radi-l"][2]) > kd,
    )
    print(
        f"6d: smooth0.5 acc {means['smooth-0.5'][0]:.4f} < smooth0 {means['smooth-0.0'][0]:.4f}:",
        means["smooth-0.5"][0] < means["smooth-0.0"][0],
    )


def crit7():
    t0 = time.perf_counter()
    schemes = ("radi-p", "radi-l", "vanilla-kd")
    out = {s: {ep: [] for ep in (30, 10, 3)} for s in schemes}
    teacher_quality = {ep: [] for ep in (30, 10, 3)}
    for seed in SEEDS:
        for ep in (30, 10, 3):
            base = base_doc(seed, teacher_epochs=ep)
            cfg0 = config_from_dict({**base, "scheme": "cls-only"})
            data = generate(cfg0.task)
            teacher, trec = train_teacher(cfg0, data)
            teacher_quality[ep].append(trec.test_result.acc_at_1)
            for scheme in schemes:
                cfg = config_from_dict({**base, "scheme": scheme})
                snap = snapshot_teacher(teacher, data[0], cfg)
                _, rec = distill_student(snap, cfg, data)
                out[scheme][ep].append(rec.test_result.acc_at_1)
    print(f"crit7 rehearsal [{time.perf_counter() - t0:.0f}s]")
    print("  teacher acc1:", {ep: round(float(np.mean(v)), 3) for ep, v in teacher_quality.items()})
    declines = {}
    for scheme in schemes:
        means = {ep: float(np.mean(v)) for ep, v in out[scheme].items()}
        declines[scheme] = means[30] - min(means.values())
        print(f"  {scheme:11s}", {ep: round(m, 4) for ep, m in means.items()}, f"decline={declines[scheme]:.4f}")
    print(
        "7: radi-p decline <= kd:", declines["radi-p"] <= declines["vanilla-kd"],
        "| radi-l decline <= kd:", declines["radi-l"] <= declines["vanilla-kd"],
    )


if __name__ == "__main__":
    crit6()
    crit7()
