"""Writes the bundled CSV datasets from scikit-learn's built-in copies.

Run from this directory: python3 make_datasets.py
"""
import re

from sklearn import datasets


def clean(name):
    return re.sub(r"[^0-9a-zA-Z]+", "_", name).strip("_").lower()


def write(stem, x, y, names, label_fmt):
    names = [clean(n) for n in names]
    with open(f"{stem}.csv", "w") as f:
        f.write(",".join(names + ["label"]) + "\n")
        for row, target in zip(x, y):
            f.write(",".join(repr(float(v)) for v in row) + "," + label_fmt(target) + "\n")
    with open(f"{stem}.schema", "w") as f:
        f.write(f"name={stem}\ntarget=label\n")
        for n in names:
            f.write(f"column.{n}=continuous\n")


def main():
    bc = datasets.load_breast_cancer()
    # 1 = malignant
    write("breast_cancer", bc.data, 1 - bc.target, bc.feature_names, lambda t: str(int(t)))

    wine = datasets.load_wine()
    # 1 = cultivar 0
    write("wine", wine.data, (wine.target == 0).astype(int), wine.feature_names,
          lambda t: str(int(t)))

    iris = datasets.load_iris()
    # 1 = virginica
    write("iris", iris.data, (iris.target == 2).astype(int), iris.feature_names,
          lambda t: str(int(t)))

    diabetes = datasets.load_diabetes(scaled=False)
    write("diabetes", diabetes.data, diabetes.target, diabetes.feature_names,
          lambda t: repr(float(t)))


if __name__ == "__main__":
    main()
