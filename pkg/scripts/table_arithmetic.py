"""Recompute the workforce ratio column and the gender summary from published percentages.

    python scripts/table_arithmetic.py
"""
from scilist.lexicon import OES_GROUPS
from scilist.profiles import gender_summary, workforce_table

# percent of science employment and percent of identified scientists, per OES group
EMPLOYMENT = [2.71, 15.48, 30.13, 30.68, 21.00]
TWITTER = [3.62, 3.18, 25.18, 19.66, 48.37]


def main():
    rows = workforce_table(dict(zip(OES_GROUPS, TWITTER)), dict(zip(OES_GROUPS, EMPLOYMENT)))
    print(f"{'group':<16}{'employment%':>12}{'twitter%':>10}{'ratio':>8}")
    for r in rows:
        print(f"{r.group.value:<16}{100 * r.employment_pct:>12.2f}{100 * r.twitter_pct:>10.2f}"
              f"{r.ratio:>8.3f}")
    s = gender_summary(12732, 20232, 45867)
    print(f"\nfemale/male ratio {s.ratio:.3f}, female share {100 * s.female_share:.1f}%, "
          f"identified {100 * s.identified_fraction:.1f}%")


if __name__ == "__main__":
    main()
