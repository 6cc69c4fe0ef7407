def compare(a, b):
    return a <= b and a != b or not a >= b
