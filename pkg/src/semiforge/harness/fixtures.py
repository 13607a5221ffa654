"""Published benchmark numbers embedded as constants.

Error rates (%) are mean and standard deviation over three seeds for three
domains (computer vision, NLP, audio) with pre-trained backbones. The
``labels_per_class`` column holds the label count listed for each setting.
"""
from __future__ import annotations

from pathlib import Path

from .results import ResultsTable, write_results_csv

# domain -> (settings, [(algorithm, [(mean, std) per setting])])
BENCHMARKS = {
    'cv': (
        [('CIFAR-100', 200), ('CIFAR-100', 400), ('STL-10', 20), ('STL-10', 40), ('Euro-SAT', 20), ('Euro-SAT', 40), ('TissueMNIST', 80), ('TissueMNIST', 400), ('Semi-Aves', 5959)],
        [
            ('supervised', [(35.63, 0.36), (26.08, 0.5), (47.02, 1.48), (26.02, 0.72), (27.12, 1.26), (16.9, 1.48), (59.91, 2.93), (54.1, 1.52), (41.55, 0.29)]),
            ('Pi-Model', [(36.24, 0.27), (26.49, 0.64), (44.38, 1.59), (25.76, 2.37), (24.51, 1.02), (11.58, 1.32), (56.79, 5.91), (47.5, 1.71), (39.23, 0.36)]),
            ('Pseudo-Labeling', [(33.16, 1.2), (25.29, 0.67), (45.13, 4.08), (26.2, 1.53), (23.64, 0.9), (15.61, 2.51), (56.22, 4.01), (50.36, 1.62), (40.13, 0.09)]),
            ('Mean Teacher', [(35.61, 0.38), (25.97, 0.37), (39.94, 1.99), (20.16, 1.25), (26.51, 1.15), (17.05, 2.07), (61.4, 2.48), (55.22, 2.06), (38.52, 0.27)]),
            ('VAT', [(31.61, 1.37), (21.29, 0.32), (52.03, 0.48), (23.1, 0.72), (24.77, 1.94), (9.3, 1.23), (58.5, 6.41), (51.31, 1.66), (39.0, 0.3)]),
            ('MixMatch', [(37.43, 0.58), (26.17, 0.24), (48.98, 1.41), (25.56, 3.0), (29.86, 2.89), (16.39, 3.17), (55.73, 2.29), (49.08, 1.06), (37.22, 0.15)]),
            ('ReMixMatch', [(20.85, 1.42), (16.8, 0.59), (30.61, 3.47), (18.33, 1.98), (4.53, 1.6), (4.1, 0.37), (59.29, 5.16), (52.92, 3.93), (30.4, 0.33)]),
            ('UDA', [(30.75, 1.03), (19.94, 0.32), (39.22, 2.87), (23.59, 2.97), (11.15, 1.2), (5.99, 0.75), (55.88, 3.26), (51.42, 2.05), (32.55, 0.26)]),
            ('FixMatch', [(30.45, 0.65), (19.48, 0.93), (42.06, 3.94), (24.05, 1.79), (12.48, 2.57), (6.41, 1.64), (55.95, 4.06), (50.93, 1.23), (31.74, 0.33)]),
            ('Dash', [(30.19, 1.34), (18.9, 0.42), (43.34, 1.46), (25.9, 0.35), (9.44, 0.75), (7.0, 1.39), (57.0, 2.81), (50.93, 1.54), (32.56, 0.39)]),
            ('CoMatch', [(35.68, 0.54), (26.1, 0.09), (29.7, 1.17), (21.46, 1.34), (5.25, 0.49), (4.89, 0.86), (57.15, 3.46), (51.83, 0.71), (41.39, 0.16)]),
            ('CRMatch', [(29.43, 1.11), (18.5, 0.26), (30.55, 2.01), (17.43, 1.96), (14.52, 1.34), (7.0, 0.69), (54.84, 3.05), (51.1, 1.59), (31.97, 0.1)]),
            ('FlexMatch', [(27.08, 0.9), (17.67, 0.66), (37.58, 2.97), (23.4, 1.5), (7.07, 2.32), (5.58, 0.57), (57.23, 2.5), (52.06, 1.78), (33.09, 0.16)]),
            ('AdaMatch', [(21.27, 1.04), (17.01, 0.55), (36.25, 1.89), (23.3, 0.73), (5.7, 0.37), (4.92, 0.87), (57.87, 4.47), (52.28, 0.79), (31.54, 0.1)]),
            ('SimMatch', [(23.26, 1.25), (16.82, 0.4), (34.12, 1.63), (22.97, 2.04), (6.88, 1.77), (5.86, 1.07), (57.91, 4.6), (51.14, 1.83), (34.14, 0.3)]),
        ],
    ),
    'nlp': (
        [('IMDB', 20), ('IMDB', 100), ('AG News', 40), ('AG News', 200), ('Amazon Review', 250), ('Amazon Review', 1000), ('Yahoo! Answer', 500), ('Yahoo! Answer', 2000), ('Yelp Review', 250), ('Yelp Review', 1000)],
        [
            ('supervised', [(20.63, 3.13), (13.47, 0.55), (15.01, 1.21), (13.0, 1.0), (51.74, 0.63), (47.34, 0.66), (37.1, 1.22), (33.56, 0.08), (50.27, 0.51), (46.96, 0.42)]),
            ('Pi-Model', [(49.02, 1.37), (27.57, 15.85), (46.84, 6.2), (13.44, 0.76), (73.53, 6.92), (48.27, 0.48), (41.37, 2.15), (32.96, 0.16), (73.35, 2.31), (52.02, 1.48)]),
            ('Pseudo-Labeling', [(26.38, 4.04), (21.38, 1.34), (23.86, 7.63), (12.29, 0.4), (53.0, 1.48), (46.49, 0.45), (38.6, 1.09), (33.44, 0.24), (55.7, 0.95), (47.72, 0.37)]),
            ('Mean Teacher', [(21.27, 3.72), (14.11, 1.77), (14.98, 1.1), (13.23, 1.12), (51.67, 0.45), (47.51, 0.24), (36.97, 1.02), (33.43, 0.22), (51.07, 1.44), (46.61, 0.34)]),
            ('VAT', [(32.59, 4.69), (14.42, 2.53), (15.0, 1.12), (11.59, 0.94), (50.38, 0.83), (46.04, 0.28), (35.16, 0.74), (31.53, 0.41), (52.76, 0.87), (45.53, 0.13)]),
            ('UDA', [(9.36, 1.26), (8.33, 0.61), (18.73, 2.68), (12.34, 1.9), (52.48, 1.2), (45.51, 0.61), (35.31, 0.43), (32.01, 0.68), (58.22, 0.4), (42.18, 0.68)]),
            ('FixMatch', [(8.2, 0.29), (7.36, 0.07), (22.8, 5.18), (11.43, 0.65), (47.85, 1.22), (43.73, 0.45), (34.15, 0.94), (30.76, 0.53), (50.34, 0.4), (41.99, 0.58)]),
            ('Dash', [(8.93, 1.27), (7.97, 0.53), (19.3, 6.73), (11.2, 1.12), (47.79, 1.03), (43.52, 0.07), (35.1, 1.36), (30.51, 0.47), (47.99, 1.05), (41.59, 0.61)]),
            ('CoMatch', [(7.36, 0.26), (7.41, 0.2), (13.25, 1.31), (11.61, 0.42), (48.98, 1.2), (44.37, 0.25), (33.48, 0.67), (30.19, 0.22), (46.49, 1.42), (41.11, 0.53)]),
            ('CRMatch', [(7.88, 0.24), (7.68, 0.35), (13.35, 1.06), (11.36, 1.04), (46.23, 0.85), (43.69, 0.48), (33.07, 0.68), (30.62, 0.47), (46.61, 1.02), (41.8, 0.77)]),
            ('FlexMatch', [(7.35, 0.1), (7.8, 0.24), (16.9, 6.76), (11.43, 0.91), (45.75, 1.21), (43.14, 0.82), (35.81, 1.09), (31.42, 0.41), (46.37, 0.74), (40.86, 0.74)]),
            ('AdaMatch', [(9.62, 1.26), (7.81, 0.46), (12.92, 1.53), (11.03, 0.62), (46.75, 1.23), (43.5, 0.67), (32.97, 0.43), (30.82, 0.29), (48.16, 0.8), (41.71, 1.08)]),
            ('SimMatch', [(7.24, 0.02), (7.44, 0.2), (14.8, 0.57), (11.12, 0.15), (47.27, 1.73), (43.09, 0.5), (34.15, 0.91), (30.64, 0.42), (46.4, 1.71), (41.24, 0.17)]),
        ],
    ),
    'audio': (
        [('GTZAN', 100), ('GTZAN', 400), ('UrbanSound8k', 100), ('UrbanSound8k', 400), ('Keyword Spotting', 50), ('Keyword Spotting', 100), ('ESC-50', 250), ('ESC-50', 500), ('FSDnoisy18k', 1772)],
        [
            ('supervised', [(52.16, 1.83), (31.53, 0.52), (40.42, 1.0), (28.55, 1.9), (6.8, 1.16), (5.25, 0.56), (51.58, 1.12), (35.67, 0.42), (35.2, 1.5)]),
            ('Pi-Model', [(74.07, 0.62), (33.18, 3.64), (54.24, 6.01), (25.89, 1.51), (64.39, 4.1), (25.48, 4.94), (47.25, 1.14), (36.0, 1.62), (35.73, 0.87)]),
            ('Pseudo-Labeling', [(57.29, 2.8), (33.93, 0.69), (42.09, 2.41), (27.0, 1.34), (7.82, 1.64), (5.16, 0.14), (49.33, 2.52), (35.58, 1.05), (35.34, 1.6)]),
            ('Mean Teacher', [(51.4, 3.48), (31.6, 1.46), (41.7, 3.39), (28.91, 0.93), (5.95, 0.44), (5.39, 0.42), (50.25, 1.95), (37.33, 1.2), (35.83, 1.22)]),
            ('VAT', [(79.51, 1.99), (35.38, 7.8), (49.62, 2.42), (27.68, 1.39), (2.18, 0.08), (2.23, 0.08), (46.42, 1.9), (36.92, 2.25), (32.07, 1.05)]),
            ('UDA', [(46.56, 8.69), (23.62, 0.63), (37.28, 3.17), (20.27, 1.58), (2.52, 0.15), (2.62, 0.1), (42.75, 0.89), (33.5, 1.95), (30.8, 0.47)]),
            ('FixMatch', [(36.04, 4.57), (22.09, 0.65), (36.12, 4.26), (21.43, 2.88), (4.84, 3.57), (2.38, 0.03), (37.75, 3.19), (30.67, 1.05), (30.31, 1.08)]),
            ('Dash', [(47.0, 3.65), (23.42, 0.83), (42.02, 5.02), (22.26, 0.89), (5.7, 4.4), (2.52, 0.16), (48.17, 1.16), (32.75, 2.27), (33.19, 0.95)]),
            ('CoMatch', [(36.93, 1.23), (22.2, 1.39), (30.59, 2.45), (21.35, 1.49), (11.39, 0.85), (9.44, 1.52), (40.17, 2.08), (29.83, 1.31), (27.63, 1.35)]),
            ('CRMatch', [(40.58, 3.97), (22.64, 1.22), (39.47, 4.66), (20.11, 2.63), (2.4, 0.13), (2.49, 0.08), (42.67, 0.51), (33.58, 1.93), (30.45, 1.52)]),
            ('FlexMatch', [(34.6, 4.07), (21.82, 1.17), (40.18, 2.73), (22.82, 3.1), (2.42, 0.08), (2.57, 0.25), (39.58, 0.59), (29.92, 1.85), (26.36, 0.55)]),
            ('AdaMatch', [(31.38, 0.41), (20.73, 0.67), (35.76, 6.39), (21.15, 1.22), (2.49, 0.08), (2.49, 0.1), (39.17, 1.74), (31.33, 1.23), (27.95, 0.74)]),
            ('SimMatch', [(32.42, 2.18), (20.8, 0.77), (31.7, 6.05), (19.55, 1.89), (2.57, 0.08), (2.53, 0.22), (39.92, 2.35), (32.83, 1.43), (28.16, 0.87)]),
        ],
    ),
}

DOMAIN_TITLES = {"cv": "computer vision", "nlp": "natural language", "audio": "audio"}

# domain -> algorithm -> (Friedman rank, final rank, mean error) as published
PUBLISHED_RANKS = {
    'cv': {
        'Pi-Model': (10.11, 11, 34.72),
        'Pseudo-Labeling': (9.89, 10, 35.08),
        'Mean Teacher': (10.89, 14, 35.6),
        'VAT': (10.11, 12, 34.55),
        'MixMatch': (10.11, 12, 36.27),
        'ReMixMatch': (4.0, 1, 26.43),
        'UDA': (6.89, 7, 30.05),
        'FixMatch': (6.56, 6, 30.39),
        'Dash': (7.44, 9, 30.58),
        'CoMatch': (7.22, 8, 30.38),
        'CRMatch': (4.67, 2, 28.37),
        'FlexMatch': (6.44, 5, 28.97),
        'AdaMatch': (5.22, 3, 27.79),
        'SimMatch': (5.44, 4, 28.12),
    },
    'nlp': {
        'Pi-Model': (11.8, 12, 45.84),
        'Pseudo-Labeling': (10.6, 11, 35.89),
        'Mean Teacher': (9.3, 10, 33.09),
        'VAT': (8.4, 8, 33.5),
        'UDA': (8.7, 9, 31.45),
        'FixMatch': (5.6, 7, 29.86),
        'Dash': (5.1, 6, 29.39),
        'CoMatch': (3.8, 3, 28.43),
        'CRMatch': (3.7, 2, 28.23),
        'FlexMatch': (4.1, 5, 28.68),
        'AdaMatch': (4.0, 4, 28.53),
        'SimMatch': (2.9, 1, 28.34),
    },
    'audio': {
        'Pi-Model': (10.67, 12, 44.03),
        'Pseudo-Labeling': (10.0, 10, 32.62),
        'Mean Teacher': (10.33, 11, 32.04),
        'VAT': (8.33, 9, 34.67),
        'UDA': (6.33, 7, 26.66),
        'FixMatch': (4.0, 3, 24.63),
        'Dash': (7.56, 8, 28.56),
        'CoMatch': (5.11, 6, 25.5),
        'CRMatch': (5.0, 5, 26.04),
        'FlexMatch': (4.11, 4, 24.47),
        'AdaMatch': (2.89, 1, 23.61),
        'SimMatch': (3.67, 2, 23.39),
    },
}

# settings in which each method's published mean error exceeds the supervised one
PUBLISHED_WORSE_THAN_SUPERVISED = {
    "cv": dict(zip(["Pi-Model", "Pseudo-Labeling", "Mean Teacher", "VAT", "MixMatch", "ReMixMatch", "UDA",
                    "FixMatch", "Dash", "CoMatch", "CRMatch", "FlexMatch", "AdaMatch", "SimMatch"],
                   [2, 1, 3, 1, 4, 0, 0, 0, 0, 2, 0, 0, 0, 0])),
    "nlp": dict(zip(["Pi-Model", "Pseudo-Labeling", "Mean Teacher", "VAT", "UDA", "FixMatch", "Dash", "CoMatch",
                     "CRMatch", "FlexMatch", "AdaMatch", "SimMatch"],
                    [9, 7, 5, 3, 2, 1, 1, 0, 0, 1, 0, 0])),
    "audio": dict(zip(["Pi-Model", "Pseudo-Labeling", "Mean Teacher", "VAT", "UDA", "FixMatch", "Dash", "CoMatch",
                       "CRMatch", "FlexMatch", "AdaMatch", "SimMatch"],
                      [7, 5, 6, 4, 0, 0, 1, 2, 0, 0, 0, 0])),
}

# per-domain final ranks over the twelve methods evaluated everywhere
DOMAIN_RANK_ALGORITHMS = ["Pi-Model", "Pseudo-Labeling", "Mean Teacher", "VAT", "UDA", "FixMatch", "Dash",
                          "CoMatch", "CRMatch", "FlexMatch", "AdaMatch", "SimMatch"]
DOMAIN_RANKS = {
    "cv": [10, 9, 12, 11, 6, 5, 8, 7, 1, 4, 2, 3],
    "nlp": [12, 11, 10, 8, 9, 7, 6, 3, 2, 5, 4, 1],
    "audio": [12, 10, 11, 9, 7, 3, 8, 6, 5, 4, 1, 2],
}
PUBLISHED_SPREAD = dict(zip(DOMAIN_RANK_ALGORITHMS, [2, 2, 2, 3, 3, 4, 2, 4, 4, 1, 3, 2]))

FIXTURE_FILES = {"cv": "cv.csv", "nlp": "nlp.csv", "audio": "audio.csv"}
DOMAIN_RANKS_FILE = "domain_ranks.csv"
SEEDS = 3


def benchmark_table(domain: str) -> ResultsTable:
    settings, rows = BENCHMARKS[domain]
    cells = {}
    for name, values in rows:
        for setting, (mean, std) in zip(settings, values):
            cells[(setting, name)] = (mean, std, SEEDS)
    return ResultsTable(list(settings), [name for name, _ in rows], cells)


def write_domain_ranks_csv(path, ranks=None, algorithms=None) -> None:
    ranks = DOMAIN_RANKS if ranks is None else ranks
    algorithms = DOMAIN_RANK_ALGORITHMS if algorithms is None else algorithms
    with Path(path).open("w", newline="") as fh:
        fh.write("# final ranks per domain for the methods evaluated in every domain\n")
        fh.write("domain," + ",".join(algorithms) + "\n")
        for domain, row in ranks.items():
            fh.write(domain + "," + ",".join(str(r) for r in row) + "\n")


def write_fixtures(directory) -> list[Path]:
    """Write one results CSV per domain plus the domain-rank rows; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for domain, fname in FIXTURE_FILES.items():
        path = directory / fname
        notes = [f"published error rates (%), {DOMAIN_TITLES[domain]} benchmark, mean and std over {SEEDS} seeds",
                 "labels_per_class holds the total label count of each setting"]
        write_results_csv(benchmark_table(domain), path, comments=notes)
        paths.append(path)
    path = directory / DOMAIN_RANKS_FILE
    write_domain_ranks_csv(path)
    paths.append(path)
    return paths


def read_domain_ranks_csv(path) -> dict:
    """Inverse of :func:`write_domain_ranks_csv`: ``{domain: {algorithm: rank}}``."""
    path = Path(path)
    rows = [ln.strip() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or not rows[0].startswith("domain,"):
        raise ValueError(f"{path}: expected a 'domain,<algorithm>,...' header")
    algorithms = rows[0].split(",")[1:]
    out = {}
    for i, row in enumerate(rows[1:], start=2):
        fields = row.split(",")
        if len(fields) != len(algorithms) + 1:
            raise ValueError(f"{path}: row {i} has {len(fields)} fields, expected {len(algorithms) + 1}")
        try:
            out[fields[0]] = dict(zip(algorithms, (int(v) for v in fields[1:])))
        except ValueError:
            raise ValueError(f"{path}: row {i} has a non-integer rank") from None
    return out
