def divisible(x):
    return x % 19 == 0
