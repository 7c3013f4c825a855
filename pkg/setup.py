from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

requires = []
with open('requirements.txt') as f:
    for line in f.readlines():
        line = line.strip()  # Remove spaces
        line = line.split('#')[0]  # Remove comments
        if line:  # Remove empty lines
            requires.append(line)

setup(
    name='gapcert',
    version='0.3.0',
    packages=['gapcert', 'gapcert.management', 'gapcert.management.commands'],
    package_dir={'': 'src'},
    package_data={'gapcert': ['problems/*.yaml']},
    license='BSD 3-clause "New" or "Revised" License',
    description='Impulsive and relaxed embeddings, gap detection and extremal certification for '
                'state-constrained control-polynomial optimal control problems',
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=requires,
    entry_points={
        'console_scripts': ['gapcert = gapcert.cli:main']
    }
)
