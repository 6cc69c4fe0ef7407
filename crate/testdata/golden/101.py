def replicate(s):
    return s * 17
