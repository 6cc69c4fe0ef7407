def kwcall(d):
    return dict(a=1, **d)
