"""How sensitive is the model to its prior pseudo-count a_v?

The prior says each worker has already labelled a_v items with an error
rate estimated from the data (either as measured against the soft
majority vote, or rescaled so a worst-case worker is merely a random
guesser). This sweep traces accuracy over a_v for both strategies on an
easy and a hard crowd: small a_v under-regularises workers with few
labels, while past ~10 the curves go flat, which is why the named
profiles simply pick from the flat region.

Run:  python demos/04_prior_strength_sweep.py
"""

from crowdbwa import BwaHyperParams, SynthSpec, accuracy, aggregate_multiclass, generate

GRID = [1, 2, 5, 10, 15, 20, 30, 40, 50]

crowds = {
    "high-quality crowd (0.75-0.95)": SynthSpec(
        num_items=600, num_workers=40, num_classes=2, redundancy=5,
        seed=42, accuracy_range=(0.75, 0.95),
    ),
    "mixed crowd (0.45-0.90)": SynthSpec(
        num_items=600, num_workers=40, num_classes=2, redundancy=5,
        seed=43, accuracy_range=(0.45, 0.90),
    ),
}

for title, spec in crowds.items():
    matrix, truth = generate(spec)
    print(f"\n{title}")
    print(f"{'a_v':>5}  {'original':>9}  {'adjusted':>9}")
    rows = {}
    for a_v in GRID:
        accs = []
        for strategy in ("original", "adjusted"):
            hp = BwaHyperParams(a_v=float(a_v), epsilon_strategy=strategy)
            result = aggregate_multiclass(matrix, hp)
            accs.append(accuracy(result.hard_labels, truth))
        rows[a_v] = accs
        print(f"{a_v:>5}  {accs[0]:>9.4f}  {accs[1]:>9.4f}")
    flat = [rows[a][1] for a in GRID if a >= 10]
    print(f"  spread across a_v >= 10 (adjusted): {max(flat) - min(flat):.4f}")
