import io
import os

from polyseep import __version__
from setuptools import setup, find_packages

here = os.path.abspath(os.path.dirname(__file__))
with io.open(os.path.join(here, 'README.md'), encoding='utf8') as f:
    README = f.read()
with io.open(os.path.join(here, 'CHANGELOG.md'), encoding='utf8') as f:
    CHANGES = f.read()

extra_options = {
    "packages": find_packages(),
    "install_requires": [
        "attrs",
        "configargparse",
        "markus",
        "marshmallow",
        "numpy",
        "scipy",
        "shapely",
        "twisted",
        "zope.interface",
    ],
}

setup(name="polyseep",
      version=__version__,
      description='Polygon scaled boundary solver for 2D Darcy seepage',
      long_description=README + '\n\n' + CHANGES,
      long_description_content_type="text/markdown",
      classifiers=["Topic :: Scientific/Engineering",
                   'Programming Language :: Python',
                   "Programming Language :: Python :: 3",
                   "Programming Language :: Python :: 3.8",
                   ],
      keywords='seepage groundwater sbfem polygon',
      license="MPL2",
      python_requires=">=3.8",
      include_package_data=True,
      package_data={"polyseep.tests": ["fixtures/*"]},
      zip_safe=False,
      tests_require=['pytest', 'coverage', 'mock>=1.0.1'],
      entry_points="""
      [console_scripts]
      polyseep = polyseep.main:main
      polyseep_element_diagnostic = polyseep.diagnostic_cli:run_element_diagnostic_cli
      """,
      **extra_options
      )
