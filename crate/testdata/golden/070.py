def divisible(num):
    return num % 3 == 0
