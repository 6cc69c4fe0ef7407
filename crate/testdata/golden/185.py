def squares(n):
    return [i ** 2 for i in range(n) if i % 2 == 0]
