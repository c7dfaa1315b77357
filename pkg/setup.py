from setuptools import setup

setup(
    name='CIRCE',
    version='0.1',
    description='Circular Rydberg core-state simulator and quadrupole-shift analysis',
    license='BSD',
    python_requires='>=3.10',
    packages=['CIRCE', 'CIRCE.utils'],
    package_data={'CIRCE': ['recipes/*.yaml']},
    install_requires=[
                    'numpy',
                    'scipy',
                    'jax>=0.4.23',
                    'jaxlib>=0.4.23',
                    'tqdm',
                    'fasteners',
                    'pyyaml',
                      ],
    extras_require={'test': ['pytest'], 'mpi': ['mpi4py']},
    entry_points={'console_scripts': ['circe=CIRCE.cli:main']},

    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python :: 3.10',
    ],
)
