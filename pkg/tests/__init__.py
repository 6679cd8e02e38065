import pathlib

TEST_DIR = pathlib.Path(__file__).resolve().parent
