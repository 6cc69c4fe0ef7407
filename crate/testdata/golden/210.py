def attrs(obj):
    return obj.value + obj.child.value
