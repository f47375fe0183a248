import numpy as np
import torch

def main():
    print("training on data/reviews")

if __name__ == "__main__":
    main()
