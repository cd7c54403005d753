"""
Setup file for the heatwave module.
"""

from pathlib import Path
import sys
from setuptools import setup
from heatwave.version import __version__

if sys.version_info < (3, 9):
    print('heatwave requires Python 3.9 or newer.')
    sys.exit(1)

here = Path(__file__).parent
long_description = (here / "README.md").read_text()

setup(name='heatwave',
      version=__version__,
      description=('Numerical checks of heat kernel Gaussian bounds, wave propagation and '
                   'Riesz transforms on finite metric measure spaces.'),
      license='MIT',
      keywords='heat kernel riesz transform spectral calculus graph laplacian',
      packages=['heatwave'],
      long_description=long_description,
      long_description_content_type='text/markdown',
      python_requires='>=3.9',
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Environment :: Console',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: MIT License',
          'Natural Language :: English',
          'Operating System :: POSIX :: Linux',
          'Programming Language :: Python',
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering :: Mathematics',
          'Topic :: Utilities',
      ],
      install_requires=['numpy', 'scipy', 'pyyaml', 'prompt_toolkit'],
      entry_points={
          'console_scripts': ['heatwave=heatwave.heatwave:main'],
          'heatwave.plugin': [
              'core=heatwave.core_plugin:CorePlugin',
              'checks=heatwave.checks_plugin:ChecksPlugin',
          ]
      })
