"""The default desk-scale suite: eight TPC-DS shaped relations and a workload.

Dependencies are planted on purpose.  ``item`` and ``customer_address`` carry
hierarchies of functional dependencies (brand -> class -> category,
city -> county -> state -> gmt offset), ``date_dim`` is functional on its key,
``store_sales`` and ``household_demographics`` have soft (noisy band)
dependencies and ``customer_demographics`` is fully independent as a control.
The control has the same shape (attribute count and cardinalities) as ``item``
so that differences in CPD sparsity come from dependencies alone.

Surrogate and foreign keys are listed last.  The network is rooted at attribute 0, and a
(near) unique key there degenerates the root histogram to single-row cells, so every
CPD row would be estimated on a handful of rows.
"""
from __future__ import annotations

import datetime
from importlib import resources

import numpy as np

from .generator import AttributeSpec as A
from .generator import GeneratorSpec

DATE_SK_1900 = 2415022  # surrogate key of 1900-01-02
N_DATES = 73049
SALES_FIRST_SK = 2450815  # 1998-01-01
SALES_DAYS = 1826


def _skewed(card: int, s: float, seed: int) -> list:
    """Zipf weights over a random permutation of the values."""
    w = 1.0 / np.arange(1, card + 1) ** s
    w = np.random.default_rng(seed).permutation(w / w.sum())
    w /= w.sum()
    return w.tolist()


def _band(rows: int, cols: int, width: int, shift=lambda r: r) -> list:
    """Row r spreads uniformly over ``width`` columns starting at ``shift(r)``."""
    t = np.zeros((rows, cols))
    for r in range(rows):
        lo = min(max(int(shift(r)), 0), cols - width)
        t[r, lo:lo + width] = 1.0 / width
    return t.tolist()


def _soft(rows: int, cols: int, target, strength: float) -> list:
    t = np.full((rows, cols), (1.0 - strength) / cols)
    for r in range(rows):
        t[r, target(r)] += strength
    return t.tolist()


def date_dim() -> GeneratorSpec:
    days = [datetime.date(1900, 1, 2) + datetime.timedelta(days=i) for i in range(N_DATES)]
    return GeneratorSpec("date_dim", N_DATES, 11, [
        A("d_year", cardinality=201, offset=1900, parent="d_date_sk", map=[d.year - 1900 for d in days]),
        A("d_moy", cardinality=12, offset=1, parent="d_date_sk", map=[d.month - 1 for d in days]),
        A("d_qoy", cardinality=4, offset=1, parent="d_moy", map=[m // 3 for m in range(12)]),
        A("d_dow", cardinality=7, parent="d_date_sk", map=[d.weekday() for d in days]),
        A("d_holiday", type="text", values=["N", "Y"], probs=[0.97, 0.03]),
        A("d_date_sk", kind="sequence", offset=DATE_SK_1900),
    ])


def item() -> GeneratorSpec:
    return GeneratorSpec("item", 20000, 12, [
        A("i_brand_id", cardinality=1000, offset=1001001, probs=_skewed(1000, 0.8, 1)),
        A("i_class", type="text", cardinality=100, prefix="class", parent="i_brand_id",
          map=[b // 10 for b in range(1000)]),
        A("i_category", type="text", cardinality=10, prefix="category", parent="i_class",
          map=[c // 10 for c in range(100)]),
        A("i_current_price", type="float", cardinality=200, offset=0.99, step=0.5, parent="i_category",
          table=_band(10, 200, 40, lambda c: 16 * c)),
        A("i_color", type="text", cardinality=60, prefix="color", zipf=0.5),
        A("i_item_sk", kind="sequence", offset=1),
    ])


def customer_address() -> GeneratorSpec:
    return GeneratorSpec("customer_address", 50000, 13, [
        A("ca_city", type="text", cardinality=2500, prefix="city", probs=_skewed(2500, 0.9, 2)),
        A("ca_county", type="text", cardinality=500, prefix="county", parent="ca_city",
          map=[c // 5 for c in range(2500)]),
        A("ca_state", type="text", cardinality=50, prefix="state", parent="ca_county",
          map=[c // 10 for c in range(500)]),
        A("ca_gmt_offset", type="float", cardinality=6, offset=-10.0, parent="ca_state",
          map=[s // 9 for s in range(50)]),
        A("ca_location_type", type="text", values=["apartment", "condo", "single family"],
          probs=[0.3, 0.2, 0.5]),
        A("ca_address_sk", kind="sequence", offset=1),
    ])


def customer() -> GeneratorSpec:
    female = ["Miss", "Mrs.", "Ms.", "Dr."]
    male = ["Mr.", "Sir", "Dr."]
    sal = ["Dr.", "Miss", "Mr.", "Mrs.", "Ms.", "Sir"]
    table = []
    for name in range(400):
        opts = female if name < 200 else male
        row = [0.0] * len(sal)
        for o in opts:
            row[sal.index(o)] = 1.0 / len(opts)
        table.append(row)
    return GeneratorSpec("customer", 100000, 14, [
        A("c_first_name", type="text", cardinality=400, prefix="name", probs=_skewed(400, 1.0, 3)),
        A("c_salutation", type="text", values=sal, parent="c_first_name", table=table),
        A("c_birth_country", type="text", cardinality=200, prefix="country", zipf=1.1),
        A("c_birth_year", cardinality=69, offset=1924),
        A("c_preferred_cust_flag", type="text", values=["N", "Y"], probs=[0.5, 0.5]),
        A("c_current_addr_sk", cardinality=50000, offset=1),
        A("c_customer_sk", kind="sequence", offset=1),
    ])


def customer_demographics() -> GeneratorSpec:
    """Independent control with the same attribute count and cardinalities as ``item``."""
    return GeneratorSpec("customer_demographics", 20000, 15, [
        A("cd_purchase_estimate", cardinality=1000, offset=500, step=500, probs=_skewed(1000, 0.8, 5)),
        A("cd_occupation", type="text", cardinality=100, prefix="occ", probs=_skewed(100, 0.5, 6)),
        A("cd_education_status", type="text", cardinality=10, prefix="edu"),
        A("cd_credit_score", type="float", cardinality=200, offset=300.5, step=2.5),
        A("cd_language", type="text", cardinality=60, prefix="lang", zipf=0.5),
        A("cd_demo_sk", kind="sequence", offset=1),
    ])


def household_demographics() -> GeneratorSpec:
    return GeneratorSpec("household_demographics", 7200, 16, [
        A("hd_income_band_sk", cardinality=20, offset=1),
        A("hd_buy_potential", type="text", values=["0-500", "501-1000", "1001-5000", "5001-10000", ">10000", "Unknown"],
          parent="hd_income_band_sk", table=_soft(20, 6, lambda b: min(b // 4, 4), 0.8)),
        A("hd_dep_count", cardinality=10),
        A("hd_vehicle_count", cardinality=6, parent="hd_income_band_sk",
          table=_soft(20, 6, lambda b: min(b // 4, 5), 0.6)),
        A("hd_demo_sk", kind="sequence", offset=1),
    ])


def store() -> GeneratorSpec:
    return GeneratorSpec("store", 10000, 17, [
        A("s_city", type="text", cardinality=200, prefix="town", probs=_skewed(200, 0.7, 4)),
        A("s_county", type="text", cardinality=40, prefix="district", parent="s_city",
          map=[c // 5 for c in range(200)]),
        A("s_state", type="text", cardinality=8, prefix="region", parent="s_county",
          map=[c // 5 for c in range(40)]),
        A("s_floor_space", cardinality=100, offset=5000000, step=10000),
        A("s_store_sk", kind="sequence", offset=1),
    ])


def store_sales(rows: int = 300000) -> GeneratorSpec:
    return GeneratorSpec("store_sales", rows, 18, [
        A("ss_quantity", cardinality=100, offset=1),
        A("ss_wholesale_cost", cardinality=100, offset=1),
        A("ss_list_price", cardinality=150, offset=1, parent="ss_wholesale_cost",
          table=_band(100, 150, 50)),
        A("ss_sold_date_sk", cardinality=SALES_DAYS, offset=SALES_FIRST_SK),
        A("ss_item_sk", cardinality=20000, offset=1, zipf=0.3),
        A("ss_customer_sk", cardinality=100000, offset=1),
        A("ss_store_sk", cardinality=10000, offset=1),
    ])


def default_specs() -> list[GeneratorSpec]:
    return [store_sales(), date_dim(), item(), customer(), customer_address(),
            customer_demographics(), household_demographics(), store()]


def default_workload() -> list[str]:
    text = resources.files("chowcard").joinpath("data/default_workload.txt").read_text(encoding="utf-8")
    return parse_workload(text)


def parse_workload(text: str) -> list[str]:
    """One query per line; blank lines and ``#`` comments are skipped."""
    return [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
