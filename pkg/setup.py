from setuptools import setup


ver_dic = {}
version_file = open("gbaxis/version.py")
try:
    version_file_contents = version_file.read()
finally:
    version_file.close()

exec(compile(version_file_contents, "gbaxis/version.py", 'exec'), ver_dic)

with open('README.md') as file:
    long_description = file.read()

setup(
    name='gbaxis',
    version=ver_dic["__version__"],
    description='Gut-brain axis delay model: simulation, bifurcation, frequency response and channel capacity',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='GNU',
    packages=['gbaxis', 'gbaxis.tests'],
    package_data={'gbaxis': ['default.cfg'], 'gbaxis.tests': ['source/*']},
    zip_safe=False,
    python_requires='>=3.8',
    classifiers=[
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    install_requires=[
        'numpy>=1.20', 'scipy>=1.6', 'matplotlib>=3.4', 'parsimonious'
    ],
    entry_points={
        'console_scripts': [
            'gbaxis = gbaxis.__main__:main'
        ]
    },
    include_package_data=True
)
