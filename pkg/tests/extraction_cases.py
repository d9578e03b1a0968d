"""Answer-extraction fixtures: (text, kind, expected)."""

MC = "multiple_choice"
NUM = "numeric"

CASES = [
    # plain "(X)" letters
    ("Step 1... The answer is (C).", MC, "C"),
    ("The answer is (A)", MC, "A"),
    ("Reasoning here.\nThe answer is (J).", MC, "J"),
    ("the answer is (B)", MC, "B"),
    ("THE ANSWER IS (D)", MC, "D"),
    ("Therefore, the answer is: (E)", MC, "E"),
    ("So the answer is **(F)**.", MC, "F"),
    ("The final answer is (G).", MC, "G"),
    ("The answer is  (H) because of X.", MC, "H"),
    ("Thus the answer is\n(I).", MC, "I"),
    # restated candidates: last match wins
    ("Maybe the answer is (A)? No. The answer is (B).", MC, "B"),
    ("The answer is (C). Wait, re-checking... The answer is (D).", MC, "D"),
    ("The answer is (A)\nThe answer is (A)\nThe answer is (C)", MC, "C"),
    ("First guess: the answer is (B). After more thought the answer is (B).", MC, "B"),
    ("If it were (A) the answer is (A), but it is not; the answer is (E).", MC, "E"),
    # parentheses optional as fallback
    ("The answer is C.", MC, "C"),
    ("The answer is B", MC, "B"),
    ("The answer is: D", MC, "D"),
    ("I think the answer is A and I am sure.", MC, "A"),
    ("The answer is (B). Oh wait, the answer is C", MC, "B"),  # parenthesized form preferred
    # multiple-choice misses
    ("no final answer given", MC, None),
    ("", MC, None),
    ("The answer is (c).", MC, None),
    ("The answer is unclear.", MC, None),
    ("Option (B) looks right.", MC, None),
    ("The answer is (AB).", MC, None),
    # boxed numerics
    (r"... The answer is \boxed{42}", NUM, "42"),
    (r"The answer is \\boxed{17}", NUM, "17"),
    (r"so \boxed{ 3 } is it", NUM, "3"),
    (r"\boxed{007}", NUM, "7"),
    (r"The answer is \boxed{{12}}", NUM, "12"),
    (r"The answer is \boxed{\frac{1}{2}}", NUM, r"\frac{1}{2}"),
    (r"The answer is \boxed{-5}", NUM, "-5"),
    (r"The answer is \boxed{0.25}", NUM, "0.25"),
    (r"The answer is \boxed{0}", NUM, "0"),
    (r"The answer is \boxed{1 000}", NUM, "1000"),
    # restated boxed candidates
    (r"First \boxed{10}, then corrected: The answer is \boxed{12}", NUM, "12"),
    (r"\boxed{5} \boxed{6} \boxed{204}", NUM, "204"),
    (r"The answer is \boxed{3}. Double-check: yes, \boxed{3}.", NUM, "3"),
    # numeric fallback to "The answer is <token>"
    ("The answer is 96.", NUM, "96"),
    ("After all that, the answer is 033", NUM, "33"),
    ("The answer is 7, then the answer is 8.", NUM, "8"),
    # numeric misses
    ("no final answer given", NUM, None),
    (r"\boxed{}", NUM, None),
    (r"unterminated \boxed{12", NUM, None),
    ("", NUM, None),
]
