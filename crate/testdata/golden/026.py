def starts(word, prefix):
    return word.startswith(prefix)
