@staticmethod
def helper(a, b=2, *rest, key=None, **extra):
    return a + b
