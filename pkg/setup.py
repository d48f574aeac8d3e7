from setuptools import find_packages, setup

setup(
    name="nullgeo",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    description="Null geodesics, skies and contact structures of three dimensional separable spacetimes.",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    install_requires=["numpy", "polars", "pytest", "scipy", "sympy", "joblib", "hypothesis"],
    entry_points={"console_scripts": ["nullgeo=nullgeo.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3.12",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Development Status :: 3 - Alpha",
    ],
    python_requires=">=3.10",
)
