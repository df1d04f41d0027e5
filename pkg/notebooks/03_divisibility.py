"""
CP- and P-divisibility from the rates
=====================================

Classify the built-in models and locate the parameter where the crossover
family stops being P-divisible.
"""

from qsl_lab import (
    classify,
    cp_oscillating_model,
    critical_k_scan,
    pdiv_crossover_model,
    sign_violation_model,
)
from qsl_lab.divisibility import check_p_divisible

for model in (cp_oscillating_model(8, 5), pdiv_crossover_model(0.5), pdiv_crossover_model(1.0), sign_violation_model(0.5)):
    verdict = classify(model, T=20)
    print(f"{model.name:16s} {model.params}  {verdict.divisibility.value}  ({len(verdict.violations)} violation records)")

# the first violation interval of the sign-violating model
v = classify(sign_violation_model(0.5), T=5).violations[0]
print("violation:", v.condition.value, round(v.t_lo, 6), round(v.t_hi, 6), "worst", v.worst)

# at k = 1 the dissipativity margin only touches zero; the default reading counts that
# as a violation, the derivative rule does not
k1 = pdiv_crossover_model(1.0)
print("k = 1 strict:", check_p_divisible(k1, 20).passed, " derivative rule:", check_p_divisible(k1, 20, borderline="derivative").passed)

print("critical k (crossover):", critical_k_scan(pdiv_crossover_model, 0.5, 1.5))
print("critical k (sign violation):", critical_k_scan(sign_violation_model, 0.5, 1.5))
