# kudos to https://stackoverflow.com/a/50193944/10717280

import setuptools

setuptools.setup(
    name="kslab",
    version="0.1",
    python_requires=">=3.12",
    packages=[
        "kslab",
        "kslab.math",
        "kslab.grid",
        "kslab.particles",
        "kslab.pde",
        "kslab.transport",
        "kslab.harness",
        "kslab.utils",
    ],
)
