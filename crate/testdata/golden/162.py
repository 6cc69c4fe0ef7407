def join_underscore(word):
    return word.replace(' ', '_')
