"""Build the bundled Adult and German CSV recipes from the raw UCI files.

Usage::

    python scripts/prepare_recipes.py RAW_DIR [OUT_DIR]

RAW_DIR must contain ``adult.data``, ``adult.test`` and ``german.data`` as
distributed by the UCI repository.  Rows of Adult with a missing (``?``) cell
are dropped, which leaves 45,222 records.  Race is binarized to
White/Non-White; German's ``personal_status`` code yields ``sex`` and age is
split at 25 years.
"""
import csv
import gzip
import io
import sys
from pathlib import Path

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

GERMAN_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose",
    "credit_amount", "savings", "employment", "installment_rate",
    "personal_status", "other_debtors", "residence_since", "property",
    "age_years", "other_installment_plans", "housing", "existing_credits",
    "job", "num_dependents", "telephone", "foreign_worker", "credit",
]

# A91, A93, A94 are male codes; A92 and A95 female.
GERMAN_SEX = {"A91": "male", "A92": "female", "A93": "male", "A94": "male", "A95": "female"}


def adult_rows(raw: Path):
    for name in ("adult.data", "adult.test"):
        with open(raw / name, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("|"):
                    continue
                cells = [c.strip() for c in line.split(",")]
                if len(cells) != len(ADULT_COLUMNS) or "?" in cells:
                    continue
                row = dict(zip(ADULT_COLUMNS, cells))
                row["income"] = row["income"].rstrip(".")
                row["race"] = "White" if row["race"] == "White" else "Non-White"
                yield row


def german_rows(raw: Path):
    with open(raw / "german.data", encoding="utf-8") as fh:
        for line in fh:
            cells = line.split()
            if not cells:
                continue
            row = dict(zip(GERMAN_COLUMNS, cells))
            row["sex"] = GERMAN_SEX[row["personal_status"]]
            row["age"] = "old" if int(row["age_years"]) > 25 else "young"
            row["credit"] = "good" if row["credit"] == "1" else "bad"
            yield row


def main(argv):
    raw = Path(argv[1])
    out = Path(argv[2]) if len(argv) > 2 else Path(__file__).parent.parent / "src/fairaudit/recipes"
    out.mkdir(parents=True, exist_ok=True)

    adult = list(adult_rows(raw))
    # mtime=0 keeps the gzip bytes reproducible
    with open(out / "adult.csv.gz", "wb") as raw_fh:
        with gzip.GzipFile(fileobj=raw_fh, mode="wb", mtime=0, filename="") as gz:
            with io.TextIOWrapper(gz, encoding="utf-8", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=ADULT_COLUMNS, lineterminator="\n")
                writer.writeheader()
                writer.writerows(adult)

    german = list(german_rows(raw))
    fields = [c for c in GERMAN_COLUMNS if c != "credit"] + ["sex", "age", "credit"]
    with open(out / "german.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(german)
    print(f"adult: {len(adult)} rows, german: {len(german)} rows -> {out}")


if __name__ == "__main__":
    main(sys.argv)
