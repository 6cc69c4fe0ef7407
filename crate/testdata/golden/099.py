def times(sentence):
    return ''.join([sentence] * 5)
