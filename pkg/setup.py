from setuptools import setup, find_packages

with open("requirements.txt") as f:
    requirements = f.read().splitlines()

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="pla_tag_tool",
    version="1.0.0",
    author="PLA Tag Embedding Team",
    author_email="example@example.com",
    description="Design, optimize and validate message-based tag embedding for non-coherent massive SIMO authentication",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/yourusername/pla_tag_tool",
    packages=find_packages(exclude=["tests"]),
    py_modules=["app"],
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "pla-tag-tool=app:main",
        ],
    },
)
