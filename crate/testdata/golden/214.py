def asserts(x):
    assert x is not None, 'x missing'
    del x
