"""Setup script for the lfp-lab linear frequency-principle laboratory"""

import pathlib
import setuptools

# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text()

setuptools.setup(
    name="lfp-lab",
    version="0.3.0",
    description="Spectral weights, gradient-flow dynamics and minimum FP-norm interpolation for wide two-layer nets",
    long_description=README,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=setuptools.find_packages(exclude=["examples", "examples.*"]),
    include_package_data=True,
    package_data={"lfp_lab": ["log.conf", "configuration/*.yaml", "configuration/user_startup/*.yaml"]},
    python_requires=">=3.9",
    install_requires=["numpy", "scipy", "PyYAML"],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["lfp-lab=lfp_lab.__main__:main"]},
)
