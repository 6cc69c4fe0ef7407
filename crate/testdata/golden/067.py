def replicate(content):
    return ''.join([content] * 17)
