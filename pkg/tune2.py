"""Scratch: find settings where distillation trends match at spec-default epochs."""
from tune_suite import run

# Faster convergence within 30 epochs via higher lr
run({"teacher": {"lr": 0.2}, "student": {"lr": 0.2}}, tag="lr0.2 30/30")
run({"teacher": {"lr": 0.3}, "student": {"lr": 0.3}}, tag="lr0.3 30/30")
# Longer runs at lr 0.1
run(
    {"teacher": {"lr": 0.1, "epochs": 60}, "student": {"lr": 0.1, "epochs": 60}},
    tag="lr0.1 60/60",
)
