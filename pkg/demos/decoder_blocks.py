"""Analytic comparison of the four upsampling decoder block variants.

Shapes, receptive fields, and parameter counts are pure arithmetic: the
factorized-dilated stack buys a 13x13 receptive field for two thirds of a
3x3 conv's parameters per pair, and the two large-kernel variants differ
only in where the lateral features merge.
"""

from segrecall.archcalc import (
    UdbVariant,
    render_arch_report,
    report_variant,
    udb_trace,
)

variants = (
    UdbVariant("basic"),
    UdbVariant("erf", dilations=(1, 2, 3)),
    UdbVariant("erf", dilations=(2, 4, 8)),
    UdbVariant("gcnet-late", kernel=7),
    UdbVariant("gcnet-early", kernel=7),
)

print(f"{'variant':<18}{'UDB rf':<10}{'UDB params':<12}{'total params':>14}")
for variant in variants:
    report = report_variant(variant, (768, 768), width=128)
    udb = {s.name: s for s in report.stages}["udb1"]
    print(f"{variant.label():<18}{f'{udb.rf[0]}x{udb.rf[1]}':<10}"
          f"{udb.params:<12}{report.total_params:>14}")

print("\nmerge order inside the two large-kernel blocks:")
for variant in variants[-2:]:
    print(f"  {variant.label():<18} {' -> '.join(udb_trace(variant))}")

print("\nfull stage table for the early-merge variant:\n")
print(render_arch_report(report_variant(UdbVariant("gcnet-early", kernel=7), (768, 768))))
