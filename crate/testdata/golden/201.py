def long_line(a, b, c):
    return a + \
        b + \
        c
